#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "depwsd/error.hpp"

// Runs `stmt` and checks it throws depwsd::Error with the given code.
#define EXPECT_DEPWSD_ERROR(stmt, errc)                                              \
  do {                                                                               \
    try {                                                                            \
      stmt;                                                                          \
      ADD_FAILURE() << "expected " << depwsd::errc_name(errc) << ", nothing thrown"; \
    } catch (const depwsd::Error& e) {                                               \
      EXPECT_EQ(e.code(), errc) << e.what();                                         \
    }                                                                                \
  } while (0)

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(DEPWSD_FIXTURES) / name; }

/// Fresh scratch directory under the system temp dir, unique per test.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "depwsd_tests" / (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

#pragma once

// Model files: a versioned text header followed by named tensors. Every
// value is stored as the 16-digit hex image of its IEEE-754 binary64 bits,
// so a reloaded model predicts bit-identically.
//
//   depwsd-model v1
//   kind <lr|mlp>
//   tensor <name> <rows> <cols>
//   <rows*cols hex words, row-major, concatenated>
//   ...
//   end

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "depwsd/classify.hpp"
#include "depwsd/error.hpp"
#include "depwsd/util.hpp"

namespace depwsd {

inline constexpr std::string_view kModelMagic = "depwsd-model v1";

namespace detail {

inline void write_tensor(std::string& out, std::string_view name, const Eigen::MatrixXd& t) {
  out += "tensor " + std::string(name) + " " + std::to_string(t.rows()) + " " + std::to_string(t.cols()) + "\n";
  out.reserve(out.size() + static_cast<std::size_t>(t.size()) * 16 + 1);
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    for (Eigen::Index c = 0; c < t.cols(); ++c) out += hex_double(t(r, c));
  out += '\n';
}

inline Eigen::MatrixXd scalar_tensor(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

[[noreturn]] inline void bad(const std::string& why) { fail(Errc::BadModelFile, why); }

}  // namespace detail

inline std::string serialize_model(const Model& model) {
  std::string out(kModelMagic);
  out += '\n';
  if (const auto* lr = std::get_if<LogRegModel>(&model)) {
    out += "kind lr\n";
    detail::write_tensor(out, "w", lr->w.transpose());
    detail::write_tensor(out, "b", detail::scalar_tensor(lr->b));
    detail::write_tensor(out, "lambda", detail::scalar_tensor(lr->lambda));
  } else {
    const auto& m = std::get<MlpModel>(model);
    out += "kind mlp\n";
    detail::write_tensor(out, "W1", m.W1);
    detail::write_tensor(out, "b1", m.b1);
    detail::write_tensor(out, "W2", m.W2);
    detail::write_tensor(out, "b2", m.b2);
  }
  out += "end\n";
  return out;
}

inline Model deserialize_model(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.size() < 2 || lines[0] != kModelMagic) detail::bad("missing '" + std::string(kModelMagic) + "' header");
  if (!lines[1].starts_with("kind ")) detail::bad("missing kind line");
  const auto kind = lines[1].substr(5);

  std::map<std::string, Eigen::MatrixXd, std::less<>> tensors;
  std::size_t i = 2;
  bool ended = false;
  while (i < lines.size()) {
    if (lines[i] == "end") {
      ended = true;
      break;
    }
    auto head = split(lines[i], ' ');
    if (head.size() != 4 || head[0] != "tensor") detail::bad("line " + std::to_string(i + 1) + ": expected 'tensor <name> <rows> <cols>'");
    long rows = 0, cols = 0;
    try {
      rows = std::stol(std::string(head[2]));
      cols = std::stol(std::string(head[3]));
    } catch (const std::exception&) {
      detail::bad("line " + std::to_string(i + 1) + ": bad tensor shape");
    }
    if (rows < 0 || cols < 0 || i + 1 >= lines.size()) detail::bad("line " + std::to_string(i + 1) + ": bad tensor shape or missing payload");
    const auto payload = lines[i + 1];
    if (payload.size() != static_cast<std::size_t>(rows * cols) * 16) detail::bad("tensor " + std::string(head[1]) + ": payload length does not match shape");
    Eigen::MatrixXd t(rows, cols);
    std::size_t off = 0;
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c, off += 16) {
        std::uint64_t bits = 0;
        if (!parse_hex_u64(payload.substr(off, 16), bits)) detail::bad("tensor " + std::string(head[1]) + ": bad hex payload");
        t(r, c) = std::bit_cast<double>(bits);
      }
    tensors[std::string(head[1])] = std::move(t);
    i += 2;
  }
  if (!ended) detail::bad("missing 'end' line");

  const auto get = [&](std::string_view name, long rows, long cols) -> const Eigen::MatrixXd& {
    auto it = tensors.find(name);
    if (it == tensors.end()) detail::bad("missing tensor " + std::string(name));
    if ((rows >= 0 && it->second.rows() != rows) || (cols >= 0 && it->second.cols() != cols)) detail::bad("tensor " + std::string(name) + " has the wrong shape");
    return it->second;
  };

  if (kind == "lr") {
    const auto& w = get("w", 1, -1);
    LogRegModel m{w.row(0).transpose(), get("b", 1, 1)(0, 0), get("lambda", 1, 1)(0, 0)};
    return m;
  }
  if (kind == "mlp") {
    const auto& W1 = get("W1", -1, -1);
    const long hidden = W1.rows();
    MlpModel m{W1, get("b1", hidden, 1).col(0), get("W2", 2, hidden), get("b2", 2, 1).col(0)};
    return m;
  }
  detail::bad("unknown model kind '" + std::string(kind) + "'");
}

inline void save_model(const std::filesystem::path& path, const Model& model) { write_file_atomic(path, serialize_model(model)); }

inline Model load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace depwsd

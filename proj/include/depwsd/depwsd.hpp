#pragma once

#include "depwsd/classify.hpp"
#include "depwsd/compose.hpp"
#include "depwsd/config.hpp"
#include "depwsd/conllu.hpp"
#include "depwsd/dataset.hpp"
#include "depwsd/embedstore.hpp"
#include "depwsd/error.hpp"
#include "depwsd/experiment.hpp"
#include "depwsd/model_io.hpp"
#include "depwsd/preprocess.hpp"
#include "depwsd/report.hpp"
#include "depwsd/synth.hpp"
#include "depwsd/util.hpp"

#pragma once

#include "samlab/autodiff.hpp"
#include "samlab/data.hpp"
#include "samlab/error.hpp"
#include "samlab/idx.hpp"
#include "samlab/model.hpp"
#include "samlab/objective.hpp"
#include "samlab/optimizers.hpp"
#include "samlab/probes.hpp"
#include "samlab/report.hpp"
#include "samlab/tensor.hpp"
#include "samlab/vector_ops.hpp"
#include "samlab/harness/checkpoint.hpp"
#include "samlab/harness/config.hpp"
#include "samlab/harness/experiment.hpp"
#include "samlab/harness/results.hpp"

#pragma once

#include "jcf/check.hpp"
#include "jcf/checkpoint.hpp"
#include "jcf/codebook.hpp"
#include "jcf/config.hpp"
#include "jcf/cost_model.hpp"
#include "jcf/dataset.hpp"
#include "jcf/errors.hpp"
#include "jcf/features.hpp"
#include "jcf/grad.hpp"
#include "jcf/linalg.hpp"
#include "jcf/method.hpp"
#include "jcf/metric.hpp"
#include "jcf/model.hpp"
#include "jcf/op_counts.hpp"
#include "jcf/pooling.hpp"
#include "jcf/recall.hpp"
#include "jcf/rng.hpp"
#include "jcf/runner.hpp"
#include "jcf/train.hpp"

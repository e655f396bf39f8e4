#pragma once

#include "trajpred/checkpoint.hpp"
#include "trajpred/config.hpp"
#include "trajpred/data.hpp"
#include "trajpred/errors.hpp"
#include "trajpred/eval.hpp"
#include "trajpred/geometry.hpp"
#include "trajpred/gradcheck.hpp"
#include "trajpred/graph.hpp"
#include "trajpred/image.hpp"
#include "trajpred/model.hpp"
#include "trajpred/nn.hpp"
#include "trajpred/params.hpp"
#include "trajpred/plot.hpp"
#include "trajpred/rng.hpp"
#include "trajpred/tensor.hpp"
#include "trajpred/train.hpp"

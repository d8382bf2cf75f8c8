#pragma once

#include "surformer/core/error.hpp"
#include "surformer/core/rng.hpp"
#include "surformer/core/tensor.hpp"
#include "surformer/data/augment.hpp"
#include "surformer/data/dataset.hpp"
#include "surformer/data/generator.hpp"
#include "surformer/eval/benchmark.hpp"
#include "surformer/eval/metrics.hpp"
#include "surformer/eval/report.hpp"
#include "surformer/forest/random_forest.hpp"
#include "surformer/io/config.hpp"
#include "surformer/model/encoder.hpp"
#include "surformer/model/fusion.hpp"
#include "surformer/model/surformer.hpp"
#include "surformer/model/tactile_transformer.hpp"
#include "surformer/model/train.hpp"
#include "surformer/nn/attention.hpp"
#include "surformer/nn/gradcheck.hpp"
#include "surformer/nn/layers.hpp"
#include "surformer/nn/loss.hpp"
#include "surformer/nn/optim.hpp"
#include "surformer/nn/parameter.hpp"
#include "surformer/nn/snapshot.hpp"
#include "surformer/pca/pca.hpp"
#include "surformer/tactile/features.hpp"

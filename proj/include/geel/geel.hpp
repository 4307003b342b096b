#pragma once

#include "geel/checkpoint.hpp"
#include "geel/codec.hpp"
#include "geel/datasets.hpp"
#include "geel/error.hpp"
#include "geel/grammar.hpp"
#include "geel/graph.hpp"
#include "geel/metrics.hpp"
#include "geel/model.hpp"
#include "geel/optimizer.hpp"
#include "geel/sampler.hpp"
#include "geel/sequence_codec.hpp"
#include "geel/training.hpp"

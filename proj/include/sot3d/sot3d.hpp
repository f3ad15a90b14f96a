#pragma once

#include "sot3d/bench/baselines.hpp"
#include "sot3d/bench/harness.hpp"
#include "sot3d/bench/report.hpp"
#include "sot3d/errors.hpp"
#include "sot3d/geom/box.hpp"
#include "sot3d/geom/fps.hpp"
#include "sot3d/geom/iou.hpp"
#include "sot3d/geom/vec3.hpp"
#include "sot3d/io/cloud_io.hpp"
#include "sot3d/io/results_io.hpp"
#include "sot3d/io/sequence_io.hpp"
#include "sot3d/io/split.hpp"
#include "sot3d/metrics.hpp"
#include "sot3d/nn/adam.hpp"
#include "sot3d/nn/edge_conv.hpp"
#include "sot3d/nn/grad_check.hpp"
#include "sot3d/nn/ops.hpp"
#include "sot3d/nn/params.hpp"
#include "sot3d/nn/tensor.hpp"
#include "sot3d/nn/voxel.hpp"
#include "sot3d/rng.hpp"
#include "sot3d/sequence.hpp"
#include "sot3d/synth/attributes.hpp"
#include "sot3d/synth/generator.hpp"
#include "sot3d/synth/scenario.hpp"
#include "sot3d/track/backbone.hpp"
#include "sot3d/track/config.hpp"
#include "sot3d/track/head.hpp"
#include "sot3d/track/loss.hpp"
#include "sot3d/track/model.hpp"
#include "sot3d/track/spt.hpp"
#include "sot3d/track/stage.hpp"
#include "sot3d/track/tracker.hpp"
#include "sot3d/track/train.hpp"

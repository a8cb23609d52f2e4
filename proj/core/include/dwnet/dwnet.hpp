#pragma once

#include "dwnet/checkpoint.hpp"
#include "dwnet/data.hpp"
#include "dwnet/errors.hpp"
#include "dwnet/experiment.hpp"
#include "dwnet/layers.hpp"
#include "dwnet/network.hpp"
#include "dwnet/optim.hpp"
#include "dwnet/rng.hpp"
#include "dwnet/spec_json.hpp"
#include "dwnet/stats.hpp"
#include "dwnet/tensor.hpp"
#include "dwnet/training.hpp"

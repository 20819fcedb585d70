#pragma once

// Umbrella header for all differentiable ops.

#include "seanet/ops_basic.hpp"
#include "seanet/ops_conv.hpp"
#include "seanet/ops_nn.hpp"
#include "seanet/ops_spatial.hpp"

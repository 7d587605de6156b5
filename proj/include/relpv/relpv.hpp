#pragma once

// Umbrella header for the library. The command-line front end lives in
// relpv/cli.hpp and is not pulled in here because it needs the vendored
// CLI11 header on the include path.

#include "relpv/checkpoint.hpp"
#include "relpv/conv3d.hpp"
#include "relpv/cost_model.hpp"
#include "relpv/data_io.hpp"
#include "relpv/errors.hpp"
#include "relpv/init.hpp"
#include "relpv/model_spec.hpp"
#include "relpv/model_zoo.hpp"
#include "relpv/network.hpp"
#include "relpv/relpv_block.hpp"
#include "relpv/rng.hpp"
#include "relpv/rten.hpp"
#include "relpv/stft_basis.hpp"
#include "relpv/tensor.hpp"
#include "relpv/tensor_ops.hpp"
#include "relpv/train.hpp"
#include "relpv/verify.hpp"

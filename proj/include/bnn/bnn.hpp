#pragma once

#include "bnn/bitmatrix.hpp"
#include "bnn/bundle.hpp"
#include "bnn/error.hpp"
#include "bnn/idx.hpp"
#include "bnn/io.hpp"
#include "bnn/layers.hpp"
#include "bnn/model.hpp"
#include "bnn/modelio.hpp"
#include "bnn/pnm.hpp"
#include "bnn/preprocess.hpp"
#include "bnn/synth.hpp"
#include "bnn/tensor.hpp"
#include "bnn/training.hpp"
#include "bnn/transfer.hpp"

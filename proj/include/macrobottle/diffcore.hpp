#pragma once

#include "macrobottle/diffcore/adam.hpp"
#include "macrobottle/diffcore/checkpoint.hpp"
#include "macrobottle/diffcore/matrix.hpp"
#include "macrobottle/diffcore/mlp.hpp"
#include "macrobottle/diffcore/ops.hpp"
#include "macrobottle/diffcore/params.hpp"
#include "macrobottle/diffcore/reparam.hpp"
#include "macrobottle/diffcore/tape.hpp"

#pragma once

#include "macrobottle/cae/config.hpp"
#include "macrobottle/cae/loss.hpp"
#include "macrobottle/cae/model.hpp"
#include "macrobottle/cae/pairs.hpp"
#include "macrobottle/cae/train.hpp"

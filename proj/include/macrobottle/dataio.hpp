#pragma once

#include "macrobottle/dataio/csv.hpp"
#include "macrobottle/dataio/dataset_dir.hpp"
#include "macrobottle/dataio/emit.hpp"
#include "macrobottle/dataio/layout.hpp"
#include "macrobottle/dataio/report.hpp"
#include "macrobottle/dataio/schema.hpp"
#include "macrobottle/dataio/standardize.hpp"

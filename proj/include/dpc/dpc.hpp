#pragma once

#include "dpc/bench.hpp"
#include "dpc/metrics.hpp"
#include "dpc/pipeline.hpp"
#include "dpc/ply.hpp"

#pragma once

#include "glassbox/error.hpp"
#include "glassbox/dataset.hpp"
#include "glassbox/model.hpp"
#include "glassbox/serialize.hpp"
#include "glassbox/csv.hpp"
#include "glassbox/config.hpp"
#include "glassbox/ingest.hpp"
#include "glassbox/parallel.hpp"
#include "glassbox/spline.hpp"
#include "glassbox/boost.hpp"
#include "glassbox/nam.hpp"
#include "glassbox/baselines.hpp"
#include "glassbox/metrics.hpp"
#include "glassbox/pipeline.hpp"
#include "glassbox/benchmark.hpp"
#include "glassbox/synth.hpp"
#include "glassbox/svg.hpp"
#include "glassbox/export.hpp"

#pragma once

#include "peerrev/analysis.hpp"
#include "peerrev/analyze.hpp"
#include "peerrev/calibration.hpp"
#include "peerrev/config.hpp"
#include "peerrev/error.hpp"
#include "peerrev/estimator.hpp"
#include "peerrev/experiments.hpp"
#include "peerrev/genmodel.hpp"
#include "peerrev/ingest.hpp"
#include "peerrev/platform.hpp"
#include "peerrev/report.hpp"
#include "peerrev/reviewer_quality.hpp"
#include "peerrev/rng.hpp"
#include "peerrev/stats.hpp"
#include "peerrev/tables.hpp"
#include "peerrev/types.hpp"

#pragma once

// Umbrella include for the whole library.

#include "panotrack/affinity.hpp"
#include "panotrack/assignment.hpp"
#include "panotrack/core.hpp"
#include "panotrack/fusion.hpp"
#include "panotrack/geometry.hpp"
#include "panotrack/io.hpp"
#include "panotrack/kalman.hpp"
#include "panotrack/metrics.hpp"
#include "panotrack/selftest.hpp"
#include "panotrack/synthetic.hpp"
#include "panotrack/tracker.hpp"

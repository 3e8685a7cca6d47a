#pragma once

// Library entry point (the CLI lives in gauge_quad/cli.hpp and needs CLI11).
#include "gauge_quad/catalog.hpp"
#include "gauge_quad/report.hpp"

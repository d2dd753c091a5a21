#pragma once
// Umbrella header for the fixmark library.

#include "fixmark/classify.hpp"
#include "fixmark/clustering.hpp"
#include "fixmark/data.hpp"
#include "fixmark/density.hpp"
#include "fixmark/ingest.hpp"
#include "fixmark/json_io.hpp"
#include "fixmark/markov.hpp"
#include "fixmark/rng.hpp"
#include "fixmark/simulate.hpp"
#include "fixmark/special.hpp"
#include "fixmark/stats.hpp"

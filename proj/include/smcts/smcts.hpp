#pragma once

// Umbrella header for the smcts library.

#include "smcts/bench.hpp"
#include "smcts/evaluation.hpp"
#include "smcts/geo.hpp"
#include "smcts/ingest.hpp"
#include "smcts/network.hpp"
#include "smcts/search.hpp"
#include "smcts/serialize.hpp"
#include "smcts/store.hpp"
#include "smcts/tree.hpp"

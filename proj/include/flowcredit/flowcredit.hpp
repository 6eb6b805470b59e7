#pragma once

// Shapley Flow: axiomatic edge attribution on causal graphs, with exact and
// Monte Carlo engines, reference oracles, synthetic systems, and file formats.

#include "flowcredit/baselines.hpp"
#include "flowcredit/boundary.hpp"
#include "flowcredit/checks.hpp"
#include "flowcredit/dot.hpp"
#include "flowcredit/error.hpp"
#include "flowcredit/expression.hpp"
#include "flowcredit/external.hpp"
#include "flowcredit/flow.hpp"
#include "flowcredit/function.hpp"
#include "flowcredit/game.hpp"
#include "flowcredit/graph.hpp"
#include "flowcredit/io.hpp"
#include "flowcredit/path_oracle.hpp"
#include "flowcredit/paths.hpp"
#include "flowcredit/rng.hpp"
#include "flowcredit/sample.hpp"
#include "flowcredit/synthetic.hpp"
#include "flowcredit/value.hpp"

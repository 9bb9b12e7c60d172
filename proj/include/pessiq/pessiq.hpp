#pragma once

// Umbrella header: the full library.

#include "pessiq/agent_lcb.hpp"
#include "pessiq/agent_vr.hpp"
#include "pessiq/evaluation.hpp"
#include "pessiq/experiment.hpp"
#include "pessiq/instances.hpp"
#include "pessiq/mdp.hpp"
#include "pessiq/mdp_io.hpp"
#include "pessiq/oracles.hpp"
#include "pessiq/rng.hpp"
#include "pessiq/sampling.hpp"

#pragma once

// Umbrella header for the micro-level multi-state reserving library.

#include "microres/binning.hpp"
#include "microres/chain_ladder.hpp"
#include "microres/claims_data.hpp"
#include "microres/config.hpp"
#include "microres/evaluation.hpp"
#include "microres/glm.hpp"
#include "microres/ibnr_counts.hpp"
#include "microres/models.hpp"
#include "microres/payment_model.hpp"
#include "microres/simulator.hpp"
#include "microres/synthetic.hpp"
#include "microres/time_model.hpp"

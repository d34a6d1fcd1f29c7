#pragma once

// Umbrella header: cyclic discrete Markov models of resource-cluster
// availability, trained from complete or sparse observation sequences.

#include "cymark/error.hpp"
#include "cymark/estimation.hpp"
#include "cymark/evaluation.hpp"
#include "cymark/forward_backward.hpp"
#include "cymark/gap_paths.hpp"
#include "cymark/ingestion.hpp"
#include "cymark/io.hpp"
#include "cymark/model.hpp"
#include "cymark/prediction.hpp"
#include "cymark/sampler.hpp"
#include "cymark/sequence.hpp"
#include "cymark/synth.hpp"
#include "cymark/time.hpp"

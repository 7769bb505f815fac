#pragma once

// Tabular deep generative population synthesis: survey data model, reversible
// encoding, a from-scratch MLP engine, GAN and VAE generators, and a
// bootstrap confidence-interval harness for robustness experiments.

#include "popsynth/checkpoint.hpp"
#include "popsynth/codec.hpp"
#include "popsynth/csv.hpp"
#include "popsynth/errors.hpp"
#include "popsynth/experiment.hpp"
#include "popsynth/gradcheck.hpp"
#include "popsynth/matrix.hpp"
#include "popsynth/metrics.hpp"
#include "popsynth/models.hpp"
#include "popsynth/nn.hpp"
#include "popsynth/report.hpp"
#include "popsynth/rng.hpp"
#include "popsynth/sampling.hpp"
#include "popsynth/stats.hpp"
#include "popsynth/surrogate.hpp"
#include "popsynth/survey.hpp"

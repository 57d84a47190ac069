#pragma once

#include "gmmgrid/error.hpp"
#include "gmmgrid/experiment.hpp"
#include "gmmgrid/grid_search.hpp"
#include "gmmgrid/io.hpp"
#include "gmmgrid/kde.hpp"
#include "gmmgrid/l2.hpp"
#include "gmmgrid/lemma_suite.hpp"
#include "gmmgrid/mixture.hpp"
#include "gmmgrid/parallel.hpp"
#include "gmmgrid/plot.hpp"
#include "gmmgrid/rng.hpp"
#include "gmmgrid/spectral.hpp"
#include "gmmgrid/theory.hpp"
#include "gmmgrid/variance.hpp"

#pragma once

#include "nlse/dataset.hpp"
#include "nlse/error.hpp"
#include "nlse/fft.hpp"
#include "nlse/field.hpp"
#include "nlse/imaging.hpp"
#include "nlse/labels.hpp"
#include "nlse/manifest.hpp"
#include "nlse/oracle.hpp"
#include "nlse/predictions.hpp"
#include "nlse/regression.hpp"
#include "nlse/report.hpp"
#include "nlse/rng.hpp"
#include "nlse/scenario.hpp"
#include "nlse/solver.hpp"

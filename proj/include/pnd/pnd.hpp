#pragma once

#include "pnd/csv.hpp"
#include "pnd/dataset.hpp"
#include "pnd/error.hpp"
#include "pnd/eval.hpp"
#include "pnd/features.hpp"
#include "pnd/histogram.hpp"
#include "pnd/ingest.hpp"
#include "pnd/learners.hpp"
#include "pnd/model_io.hpp"
#include "pnd/parallel.hpp"
#include "pnd/resample.hpp"
#include "pnd/rng.hpp"
#include "pnd/synth.hpp"
#include "pnd/tree.hpp"

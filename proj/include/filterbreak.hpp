#pragma once

#include "filterbreak/commit_miner.hpp"
#include "filterbreak/dataset.hpp"
#include "filterbreak/errors.hpp"
#include "filterbreak/eval.hpp"
#include "filterbreak/features.hpp"
#include "filterbreak/filter_engine.hpp"
#include "filterbreak/gbdt.hpp"
#include "filterbreak/graph.hpp"
#include "filterbreak/graphml.hpp"
#include "filterbreak/intervention.hpp"
#include "filterbreak/matrix.hpp"
#include "filterbreak/parallel.hpp"
#include "filterbreak/pipeline.hpp"
#include "filterbreak/preprocess.hpp"
#include "filterbreak/rng.hpp"
#include "filterbreak/roc.hpp"
#include "filterbreak/synth.hpp"
#include "filterbreak/url.hpp"
#include "filterbreak/version.hpp"

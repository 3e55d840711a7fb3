#pragma once

#include "dact/adam.hpp"
#include "dact/checkpoint.hpp"
#include "dact/config.hpp"
#include "dact/corpus.hpp"
#include "dact/embeddings.hpp"
#include "dact/error.hpp"
#include "dact/graph.hpp"
#include "dact/init.hpp"
#include "dact/models.hpp"
#include "dact/ops.hpp"
#include "dact/param_store.hpp"
#include "dact/pipeline.hpp"
#include "dact/report.hpp"
#include "dact/sampling.hpp"
#include "dact/tensor.hpp"
#include "dact/vocab.hpp"

#pragma once

#include "hybridrag/config.hpp"
#include "hybridrag/corpus.hpp"
#include "hybridrag/dense_store.hpp"
#include "hybridrag/embedding_client.hpp"
#include "hybridrag/error.hpp"
#include "hybridrag/expansion.hpp"
#include "hybridrag/fusion.hpp"
#include "hybridrag/generation.hpp"
#include "hybridrag/hallu_metrics.hpp"
#include "hybridrag/pipeline.hpp"
#include "hybridrag/rank_metrics.hpp"
#include "hybridrag/ranked_list.hpp"
#include "hybridrag/sparse_index.hpp"
#include "hybridrag/text.hpp"

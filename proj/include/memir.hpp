#pragma once

#include "memir/atoms.hpp"
#include "memir/bm25.hpp"
#include "memir/compile.hpp"
#include "memir/corpus.hpp"
#include "memir/dates.hpp"
#include "memir/errors.hpp"
#include "memir/eval.hpp"
#include "memir/ids.hpp"
#include "memir/pipeline.hpp"
#include "memir/profiles.hpp"
#include "memir/projection.hpp"
#include "memir/prompts.hpp"
#include "memir/providers.hpp"
#include "memir/reference_providers.hpp"
#include "memir/retrieval.hpp"
#include "memir/store.hpp"
#include "memir/store_io.hpp"
#include "memir/temporal.hpp"
#include "memir/text.hpp"
#include "memir/trace.hpp"
#include "memir/utilization.hpp"

#pragma once

#include "fgram/avm.hpp"
#include "fgram/error.hpp"
#include "fgram/formula.hpp"
#include "fgram/grammar.hpp"
#include "fgram/graph.hpp"
#include "fgram/recognizer.hpp"
#include "fgram/sat.hpp"
#include "fgram/solver.hpp"

#pragma once

#include "dca/color.hpp"
#include "dca/config.hpp"
#include "dca/consistency.hpp"
#include "dca/contrast.hpp"
#include "dca/delaunay.hpp"
#include "dca/error.hpp"
#include "dca/feedback.hpp"
#include "dca/hash.hpp"
#include "dca/ideas.hpp"
#include "dca/model.hpp"
#include "dca/recognizer.hpp"
#include "dca/report.hpp"
#include "dca/rollup.hpp"
#include "dca/semantics.hpp"
#include "dca/service.hpp"
#include "dca/spatial.hpp"
#include "dca/storage.hpp"

#pragma once

#include "core.hpp"
#include "engines.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "ledger.hpp"
#include "mi_index.hpp"
#include "streamgen.hpp"

#pragma once

#include "ef21/accounting.hpp"
#include "ef21/compressors.hpp"
#include "ef21/core.hpp"
#include "ef21/data.hpp"
#include "ef21/fixtures.hpp"
#include "ef21/harness.hpp"
#include "ef21/methods.hpp"
#include "ef21/oracles.hpp"
#include "ef21/problems.hpp"
#include "ef21/theory.hpp"

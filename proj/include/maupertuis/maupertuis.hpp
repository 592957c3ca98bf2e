#pragma once

#include "algebroid.hpp"
#include "calculus.hpp"
#include "core.hpp"
#include "dynamics.hpp"
#include "jacobi.hpp"
#include "models.hpp"
#include "verify.hpp"

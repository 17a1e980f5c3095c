#pragma once

#include "isocalm/certificates.hpp"
#include "isocalm/cone.hpp"
#include "isocalm/demo_cases.hpp"
#include "isocalm/empirics.hpp"
#include "isocalm/error.hpp"
#include "isocalm/face.hpp"
#include "isocalm/linalg.hpp"
#include "isocalm/operators.hpp"
#include "isocalm/problem.hpp"
#include "isocalm/regularizer.hpp"
#include "isocalm/report_io.hpp"
#include "isocalm/solver.hpp"

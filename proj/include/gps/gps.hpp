#pragma once

#include "gps/numeric.hpp"
#include "gps/plf.hpp"
#include "gps/maxmin.hpp"
#include "gps/curves.hpp"
#include "gps/report.hpp"
#include "gps/simulator.hpp"
#include "gps/bounds.hpp"
#include "gps/oracle.hpp"

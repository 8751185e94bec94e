#pragma once

#include "ancsim/amplifier.hpp"
#include "ancsim/config.hpp"
#include "ancsim/controller.hpp"
#include "ancsim/delay_line.hpp"
#include "ancsim/engine.hpp"
#include "ancsim/errors.hpp"
#include "ancsim/experiments.hpp"
#include "ancsim/filter_design.hpp"
#include "ancsim/fir.hpp"
#include "ancsim/io.hpp"
#include "ancsim/kalman.hpp"
#include "ancsim/lms.hpp"
#include "ancsim/rng.hpp"
#include "ancsim/signals.hpp"
#include "ancsim/spectrum.hpp"
#include "ancsim/stats.hpp"

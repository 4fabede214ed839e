#pragma once

#include "delayshare/errors.hpp"
#include "delayshare/matrix.hpp"
#include "delayshare/games.hpp"
#include "delayshare/aggregator.hpp"
#include "delayshare/delaysim.hpp"
#include "delayshare/oracle.hpp"
#include "delayshare/metrics.hpp"
#include "delayshare/replay.hpp"
#include "delayshare/dataio.hpp"
#include "delayshare/synth.hpp"
#include "delayshare/experiment.hpp"

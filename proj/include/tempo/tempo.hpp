#pragma once

#include "tempo/common.hpp"
#include "tempo/control.hpp"
#include "tempo/fair_share.hpp"
#include "tempo/lp.hpp"
#include "tempo/pald.hpp"
#include "tempo/qs.hpp"
#include "tempo/rm_config.hpp"
#include "tempo/simulator.hpp"
#include "tempo/workload.hpp"

#ifndef RSM_RSM_HPP
#define RSM_RSM_HPP

#include "rsm/errors.hpp"
#include "rsm/tolerances.hpp"
#include "rsm/markov.hpp"
#include "rsm/topology.hpp"
#include "rsm/learner.hpp"
#include "rsm/data.hpp"
#include "rsm/baselines.hpp"
#include "rsm/eval.hpp"
#include "rsm/shredder.hpp"

#endif // RSM_RSM_HPP

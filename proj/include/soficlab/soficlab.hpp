#ifndef SOFICLAB_SOFICLAB_HPP
#define SOFICLAB_SOFICLAB_HPP

#include "soficlab/errors.hpp"
#include "soficlab/rng.hpp"
#include "soficlab/parallel.hpp"
#include "soficlab/numeric.hpp"
#include "soficlab/group.hpp"
#include "soficlab/sofic.hpp"
#include "soficlab/alphabet.hpp"
#include "soficlab/measure.hpp"
#include "soficlab/type_classes.hpp"
#include "soficlab/window_distribution.hpp"
#include "soficlab/marginals.hpp"
#include "soficlab/entropy.hpp"
#include "soficlab/convergence.hpp"
#include "soficlab/constructions.hpp"
#include "soficlab/serialization.hpp"
#include "soficlab/config.hpp"
#include "soficlab/scenarios.hpp"
#include "soficlab/experiment.hpp"

#endif  // SOFICLAB_SOFICLAB_HPP

#pragma once

#include "poissonseg/episode.hpp"
#include "poissonseg/error.hpp"
#include "poissonseg/graph.hpp"
#include "poissonseg/io.hpp"
#include "poissonseg/manifest.hpp"
#include "poissonseg/metrics.hpp"
#include "poissonseg/poisson.hpp"
#include "poissonseg/prototype.hpp"
#include "poissonseg/scc.hpp"
#include "poissonseg/synth.hpp"
#include "poissonseg/tensor.hpp"

#pragma once

#include "mtlr/campaign.hpp"
#include "mtlr/dataset.hpp"
#include "mtlr/dataset_gen.hpp"
#include "mtlr/error_bounds.hpp"
#include "mtlr/errors.hpp"
#include "mtlr/io.hpp"
#include "mtlr/mr.hpp"
#include "mtlr/random.hpp"
#include "mtlr/solver.hpp"
#include "mtlr/sut.hpp"
#include "mtlr/transform.hpp"
#include "mtlr/zoo.hpp"

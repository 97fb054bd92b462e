#ifndef EXITOPT_EXITOPT_HPP
#define EXITOPT_EXITOPT_HPP

#include "exitopt/closed_form.hpp"
#include "exitopt/errors.hpp"
#include "exitopt/fd.hpp"
#include "exitopt/hjb.hpp"
#include "exitopt/io.hpp"
#include "exitopt/model.hpp"
#include "exitopt/montecarlo.hpp"
#include "exitopt/roots.hpp"
#include "exitopt/truncated.hpp"

#endif

#pragma once

#include "contractive/errors.hpp"
#include "contractive/linalg.hpp"
#include "contractive/flow.hpp"
#include "contractive/inner.hpp"
#include "contractive/outer.hpp"
#include "contractive/multilayer.hpp"
#include "contractive/combinatorial.hpp"
#include "contractive/timevary.hpp"
#include "contractive/stabilize.hpp"
#include "contractive/io.hpp"
#include "contractive/builtins.hpp"
#include "contractive/job.hpp"

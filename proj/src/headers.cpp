// Compiles every public header in one translation unit.

#include "nearnet/cli.hpp"
#include "nearnet/config.hpp"
#include "nearnet/correlate.hpp"
#include "nearnet/grid.hpp"
#include "nearnet/imf.hpp"
#include "nearnet/io.hpp"
#include "nearnet/machine.hpp"
#include "nearnet/orient.hpp"
#include "nearnet/parallel.hpp"
#include "nearnet/planner.hpp"
#include "nearnet/support.hpp"
#include "nearnet/workspace.hpp"

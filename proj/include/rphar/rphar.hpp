#pragma once

#include "baseline.hpp"
#include "bovw.hpp"
#include "cache.hpp"
#include "config.hpp"
#include "dense.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "image.hpp"
#include "ingest.hpp"
#include "plot.hpp"
#include "png.hpp"
#include "rp.hpp"
#include "spectrum.hpp"
#include "stats.hpp"
#include "svm.hpp"

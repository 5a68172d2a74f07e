#pragma once

#include "slidesurge/coupling.hpp"
#include "slidesurge/esri_ascii.hpp"
#include "slidesurge/faults.hpp"
#include "slidesurge/grid.hpp"
#include "slidesurge/observables.hpp"
#include "slidesurge/parallel.hpp"
#include "slidesurge/rheology.hpp"
#include "slidesurge/scenario.hpp"
#include "slidesurge/slide.hpp"
#include "slidesurge/swe.hpp"
#include "slidesurge/swe_run.hpp"
#include "slidesurge/validation.hpp"
#include "slidesurge/version.hpp"

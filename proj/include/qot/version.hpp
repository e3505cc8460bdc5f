#pragma once

#define QOT_VERSION "0.1.0"

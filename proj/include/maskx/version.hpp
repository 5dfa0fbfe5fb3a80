#pragma once

#define MASKX_VERSION "0.1.0"

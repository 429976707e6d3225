﻿

#!/usr/bin/env python3
import time

time.sleep(30)

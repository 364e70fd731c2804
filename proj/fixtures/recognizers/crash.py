#!/usr/bin/env python3
import sys

sys.stdin.read()
sys.stderr.write("model weights missing\n")
sys.exit(3)

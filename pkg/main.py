"""
rd-lens - exact rate-distortion analysis of a discrete latent-variable model.

    python main.py calibrate
    python main.py train --objective beta:1.0
    python main.py train --objective target-rate:0.5 --out model_rate.json
    python main.py eval --checkpoint model_rate.json
"""
import sys

from ui.commands import main

if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python
"""
Quick script to verify all imports work correctly
"""
import os
import sys

try:
    import numpy
    import pandas
    import scipy.linalg
    import sklearn.covariance
    print("✓ numerical stack imported successfully")
except ImportError as e:
    print(f"✗ numerical stack import failed: {e}")
    print("\nTo fix: pip install -r requirements.txt")
    sys.exit(1)

try:
    from rest_framework import serializers
    print("✓ rest_framework imported successfully")
except ImportError as e:
    print(f"✗ rest_framework import failed: {e}")
    print("\nTo fix: pip install djangorestframework")
    sys.exit(1)

try:
    import django
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'sparsecoint.settings')
    django.setup()
    from core.estimator import fit_by_method
    from reports.services import WorkflowService
    print("✓ sparsecoint modules imported successfully")
except ImportError as e:
    print(f"✗ sparsecoint import failed: {e}")
    print("\nMake sure you're running from the project root and Django is set up")
    sys.exit(1)

print("\n✓ All imports verified successfully!")

"""Configure Django before pytest imports the test modules."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'sparsecoint.settings')
django.setup()

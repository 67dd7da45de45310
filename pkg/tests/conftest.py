import os

from hypothesis import settings

settings.register_profile('default', deadline=None, max_examples=60)
settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'default'))

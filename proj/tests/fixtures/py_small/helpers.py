def shout():
    return "hey"

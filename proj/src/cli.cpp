namespace carnot {}

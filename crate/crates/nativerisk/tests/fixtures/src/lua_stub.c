/* Stand-in for a 32-bit Lua 5.3.5 core, built without libc. */

const char lua_ident[] =
    "$LuaVersion: Lua 5.3.5  Copyright (C) 1994-2018 Lua.org, PUC-Rio $"
    "$LuaAuthors: R. Ierusalimschy, L. H. de Figueiredo, W. Celes $";

typedef struct lua_State { int top; void *upvals[4]; } lua_State;

lua_State *lua_newstate(void *f, void *ud)
{
    (void)f;
    return (lua_State *)ud;
}

void lua_upvaluejoin(lua_State *L, int f1, int n1, int f2, int n2)
{
    L->upvals[n1 & 3] = L->upvals[n2 & 3];
    L->top = f1 + f2;
}

int luaL_loadbuffer(lua_State *L, const char *buff, unsigned long sz, const char *name)
{
    (void)buff;
    (void)name;
    return L->top + (int)sz;
}
